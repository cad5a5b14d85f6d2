from setuptools import setup, find_packages

version=__import__('ontoforge').__version__

setup(
    name='ontoforge',
    version=version,
    description='Compile an OWL T-Box into ontology-checked tools, serve them over JSON-RPC and score the resulting knowledge graphs.',
    long_description=open('README.rst').read(),
    license='BSD',
    packages=find_packages(exclude=['ez_setup', 'examples', 'examples.*', 'examplekg']),
    package_data={'ontoforge': ['tests/fixtures/*']},
    include_package_data=True,
    zip_safe=False,
    python_requires='>=3.9',
    install_requires=[
        'Django>=4.2',
        'rdflib>=7.0',
        'pydantic>=2.0',
        'requests>=2.28',
        'Levenshtein>=0.21',
        'numpy>=1.24',
        'scipy>=1.10',
    ],
    classifiers=[
        'Development Status :: 4 - Beta',
        'Environment :: Console',
        'Framework :: Django',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: BSD License',
        'Operating System :: OS Independent',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Information Analysis',
    ],
)
