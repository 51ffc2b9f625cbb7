#!/usr/bin/env python

from setuptools import setup


_INSTALL_REQUIRES = [
    'numpy>=1.22',
    'pandas>=1.5',
    'pydantic>=2.0',
    'tqdm',
    'Twisted>=16.2.0',
]

setup(
    name='mldas',
    version='0.3.0',
    description='SDN DDoS detection lab with dynamic model selection',
    long_description="""mldas generates labelled SDN flow datasets, trains tree
 and linear detectors on them and replays a simulated controller that picks the
 active model online and pushes DROP rules for attacking sources""",
    license='MIT',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Natural Language :: English',
        'Operating System :: OS Independent',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
        'Topic :: System :: Networking :: Monitoring',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
    ],
    zip_safe=True,
    python_requires='>=3.9',
    packages=[
        'mldas',
        'mldas.config',
        'mldas.flows',
        'mldas.traffic',
        'mldas.features',
        'mldas.ml',
        'mldas.selector',
        'mldas.controller',
    ],
    package_dir={'mldas': 'mldas'},
    entry_points={
        'console_scripts': [
            'mldas = mldas.cli:run',
        ]
    },
    install_requires=_INSTALL_REQUIRES
)
