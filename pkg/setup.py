from setuptools import setup, find_packages


def read_requirements(filename):
    with open(filename) as f:
        return [line.strip() for line in f if line.strip() and not line.startswith("#")]


setup(
    name="transg",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    install_requires=read_requirements("requirements.txt"),
    description="Skeleton graph transformer with prototype contrastive learning and masked reconstruction for skeleton-based person re-identification",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
    ],
    python_requires=">=3.9",
    include_package_data=True,
    package_data={
        "transg": ["py.typed"],
    },
    entry_points={
        "console_scripts": ["transg=transg.cli:main"],
    },
)
