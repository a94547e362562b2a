#!/usr/bin/env python
'''
Build/install wellclust: k-means++ with a posteriori well-clusterability
checks.

'''

from setuptools import setup, find_packages
setup(
    name = 'wellclust',
    version = '0.1.0',
    packages = find_packages(include=['wellclust', 'wellclust.*']),
    install_requires = [
        'Click',
        'numpy',
        'scipy',
        'jsonnet',
    ],
    extras_require = {
        'test': ['pytest'],
    },
    entry_points = dict(
        console_scripts = [
            'wellclust = wellclust.__main__:main',
        ]
    )
)
