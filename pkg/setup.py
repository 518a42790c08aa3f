# -*- coding: utf-8 -*-
from setuptools import find_packages
from setuptools import setup

import acceldiff

readme = open('README.md').read()


setup(
    name='acceldiff',
    version=acceldiff.__version__,
    description='Accelerated diffusion samplers for heavy-tailed densities',
    long_description=readme,
    author=acceldiff.__author__,
    packages=find_packages(exclude=['tests*']),
    install_requires=[
        'numpy>=1.17',
        'scipy>=1.4',
    ],
    entry_points={
        'console_scripts': ['acceldiff = acceldiff.cli:main'],
    },
    keywords='diffusion langevin sampling heavy-tailed',
    classifiers=[
        'Development Status :: 2 - Pre-Alpha',
        'Intended Audience :: Science/Research',
        'Natural Language :: English',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.6',
        'Programming Language :: Python :: 3.7',
        'Programming Language :: Python :: 3.8',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
)
