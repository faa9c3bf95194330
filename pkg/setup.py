#!/usr/bin/env python

from setuptools import setup

with open("README.md", "r", encoding='UTF8') as fh:
    long_description = fh.read()

setup(name='mrstab',
      version='0.1.0',
      description='Effective stability, middle recurrence and relative hyperbolicity experiments on finite metric graphs',
      long_description=long_description,
      long_description_content_type="text/markdown",
      keywords=['Geometric group theory', 'Cayley graphs', 'Stability', 'Relative hyperbolicity', 'Quasigeodesics'],
      packages=['mrstab', 'mrstab.common', 'mrstab.spaces', 'mrstab.estimators', 'mrstab.experiments'],
      package_dir={
          'mrstab': 'mrstab',
          'mrstab.common': 'mrstab/common',
          'mrstab.spaces': 'mrstab/spaces',
          'mrstab.estimators': 'mrstab/estimators',
          'mrstab.experiments': 'mrstab/experiments'
      },
      scripts=['scripts/mrstab_cli.py'],
      install_requires=[
        'numpy',
        'scipy',
        'networkx',
        'pandas',
        'tqdm',
        'wandb',
      ],
      tests_require=['pytest', 'hypothesis']
    )
