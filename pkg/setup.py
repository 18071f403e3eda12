from setuptools import setup, find_packages

with open("README.md", "r") as f:
    long_description = f.read()

setup(
    name="entropynet",
    version="0.1.0",
    description="Entropy-residual clipped tanh networks for scalar conservation laws",
    long_description=long_description,
    long_description_content_type="text/markdown",
    license='MIT',
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    platforms=['any'],
    python_requires='>=3.8',
    packages=find_packages(exclude=['contrib', 'docs', 'tests', 'fixtures', 'examples']),
    include_package_data=True,
    install_requires=[
        'numpy>=1.18.5',
        'pandas>=1.0.4',
        'bokeh>=2.0.2',
        'colour>=0.1.5',
    ],
    extras_require={
        'test': ['pytest>=6.0', 'hypothesis>=6.0'],
    },
    entry_points={
        'console_scripts': ['entropynet=entropynet.cli:main'],
    },
)
