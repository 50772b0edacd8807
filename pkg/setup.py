#!/usr/bin/env python3
"""
Setup script for atensor
Chart-based verification of A-tensors, unit Killing fields and circle-bundle metrics
"""

from pathlib import Path
import re

from setuptools import setup, find_packages

HERE = Path(__file__).parent


def get_version():
    match = re.search(r"^__version__ = ['\"]([^'\"]+)['\"]", (HERE / 'atensor/__init__.py').read_text(encoding='utf-8'), re.M)
    return match.group(1) if match else '0.0.0'


def get_long_description():
    readme = HERE / 'README.md'
    return readme.read_text(encoding='utf-8') if readme.exists() else 'Numerical verification engine for A-tensors and circle-bundle metrics'


setup(
    name='atensor',
    version=get_version(),
    description='Chart-based Riemannian geometry engine verifying A-tensor and circle-bundle curvature identities',
    long_description=get_long_description(),
    long_description_content_type='text/markdown',
    license='MIT',

    packages=find_packages(exclude=['tests', 'tests.*', 'examples', 'examples.*']),

    # Entry points
    entry_points={
        'console_scripts': [
            'atensor-verify=atensor.cli:main',
            'atensor=atensor.cli:main',
        ],
    },

    # Dependencies
    install_requires=[
        'numpy',   # Tensor algebra and contractions
        'scipy',   # Generalized eigenproblems, Cholesky, quasi-random sampling
        'psutil',  # Worker count and memory in performance logs
    ],

    # Optional dependencies
    extras_require={
        'dev': [
            'pytest',
            'flake8',
            'mypy',
        ],
    },

    # Classifiers
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],

    # Keywords
    keywords='riemannian geometry curvature killing field ricci tensor verification',

    # Python version
    python_requires='>=3.8',

    zip_safe=False,
)
