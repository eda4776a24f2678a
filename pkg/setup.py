#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""
Setup script for graphon-lq-control
"""

from setuptools import setup

# Read the README file for long description
with open("README.md", "r", encoding="utf-8") as f:
    long_description = f.read()

# Read requirements, stopping at the development block
requirements = []
with open("requirements.txt", "r", encoding="utf-8") as f:
    for line in f:
        line = line.strip()
        if line.startswith("# Development"):
            break
        if line and not line.startswith("#"):
            requirements.append(line)

setup(
    name="graphon-lq-control",
    version="0.1.0",
    description=(
        "Centralized and decentralized LQ control of agents on graphon networks "
        "with correlated noise"
    ),
    long_description=long_description,
    long_description_content_type="text/markdown",
    author="graphon-lq-control contributors",
    license="MIT",
    # Package discovery
    packages=["graphon_lq"],
    include_package_data=True,
    zip_safe=False,
    # Dependencies
    install_requires=requirements,
    python_requires=">=3.8",
    extras_require={
        "dev": [
            "pytest>=7.0.0",
            "pytest-cov>=4.0.0",
            "black>=23.0.0",
            "flake8>=6.0.0",
            "mypy>=1.0.0",
        ]
    },
    # Command-line entry point
    entry_points={"console_scripts": ["graphon-lq = graphon_lq.cli:main"]},
    # Classifiers
    classifiers=[
        "Development Status :: 4 - Beta",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    # Keywords
    keywords="graphon lq optimal-control riccati q-wiener networks",
)
