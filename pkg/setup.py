# -*- coding: utf-8 -*-

from setuptools import (
    find_packages,
    setup
)

with open('requirements.txt') as fp:
    install_requires = [line.strip() for line in fp if line.strip()]

setup(
    name='mtsclust',
    version='0.1.0',
    description='Static and dynamic clustering forecasters for multivariate '
                'time series, with their evaluation protocol.',
    packages=find_packages(include=['mtsclust', 'mtsclust.*']),
    python_requires='>=3.8',
    install_requires=install_requires,
    entry_points={
        'console_scripts': [
            'bench = mtsclust.bench.cli:main'
        ]
    }
)
