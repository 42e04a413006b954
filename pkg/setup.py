import setuptools

name = "popstack"
version = "0.1.0"

with open("README.md", "r", encoding="utf8") as fh:
    long_description = fh.read()

setuptools.setup(
    name=name,
    version=version,
    description="Pop-stack sorting and 2-avoidance characterizations of the permutations it sorts",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=["popstack"],
    package_data={"popstack": ["data/*.pairs", "data/*.yaml"]},
    entry_points={"console_scripts": ["popstack = popstack.cli:main"]},
    install_requires=[
        "pytest",
        "mypy",
        "black",
        "sphinx",
        "pandas",
        "joblib",
        "PyYAML",
        "sphinx-rtd-theme"
    ]
)
