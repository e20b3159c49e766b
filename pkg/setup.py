#!/usr/bin/env python

from pathlib import Path

from setuptools import find_packages, setup

NAME = "meshconflict"
PACKAGES = find_packages(where="src")
CLASSIFIERS = [
    "Development Status :: 4 - Beta",
    "Intended Audience :: Science/Research",
    "License :: OSI Approved :: MIT License",
    "Operating System :: OS Independent",
    "Programming Language :: Python",
    "Programming Language :: Python :: 3",
    "Topic :: System :: Networking",
]
INSTALL_REQUIRES = [
    "click",
    "toml",
    "Jinja2",
    "networkx>=2.6",
    "numpy",
    "scipy",
]
EXTRA_REQUIRE = {
    "docs": ["sphinx>=1.7.5", "myst-nb", "sphinx-book-theme"],
    "test": ["pytest"],
    "lint": ["mypy", "pre-commit"],
}


def get_long_description() -> str:
    return (Path(__file__).parent / "README.md").read_text(encoding="utf-8")


if __name__ == "__main__":
    setup(
        name=NAME,
        use_scm_version={
            "write_to": "src/meshconflict/meshconflict_version.py",
            "write_to_template": 'version = "{version}"\n',
            "fallback_version": "0.1.0",
        },
        author="meshconflict developers",
        url="https://github.com/meshconflict/meshconflict",
        license="MIT",
        description=(
            "Radio co-location aware conflict graphs and channel "
            "assignment for multi-radio wireless mesh networks"
        ),
        long_description=get_long_description(),
        long_description_content_type="text/markdown",
        packages=PACKAGES,
        package_dir={"": "src"},
        package_data={"meshconflict": ["py.typed", "templates/*"]},
        include_package_data=True,
        python_requires=">=3.8",
        install_requires=INSTALL_REQUIRES,
        extras_require=EXTRA_REQUIRE,
        classifiers=CLASSIFIERS,
        zip_safe=False,
        entry_points={"console_scripts": ["meshconflict=meshconflict:main"]},
    )
