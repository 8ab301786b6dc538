from setuptools import find_packages, setup

with open("README.rst") as f:
    long_description = f.read()


setup(
    name="smog-mobo",
    version="0.1.0",
    description="Scalable meta-learning of multi-objective Gaussian process priors for BO",
    long_description=long_description,
    long_description_content_type="text/x-rst",
    packages=find_packages(include=["smog*"]),
    package_data={
        "smog": ["py.typed"],
    },
    entry_points={"console_scripts": ["smog = smog.harness.__main__:main"]},
    install_requires=[
        "attrs >= 21.3.0",
        "numpy >= 1.22.0",
        "scipy >= 1.8.0",
        "matplotlib >= 3.5.0",
    ],
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: BSD License",
        "Natural Language :: English",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Programming Language :: Python :: 3.13",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
)
