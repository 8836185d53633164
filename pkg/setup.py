"""
realpg
Regression-aware policy gradients with a policy-dependent reward on small softmax policies
"""
import sys

from setuptools import find_packages, setup

short_description = __doc__.split("\n")

# from https://github.com/pytest-dev/pytest-runner#conditional-requirement
needs_pytest = {'pytest', 'test', 'ptr'}.intersection(sys.argv)
pytest_runner = ['pytest-runner'] if needs_pytest else []

try:
    with open("README.md", "r") as handle:
        long_description = handle.read()
except OSError:
    long_description = "\n".join(short_description[2:])

with open("requirements.txt", "r") as handle:
    install_requires = [line.strip() for line in handle if line.strip() and not line.startswith("#")]


setup(
    name='realpg',
    description=short_description[1],
    long_description=long_description,
    long_description_content_type="text/markdown",
    version="0.1.0",
    license='MIT',

    packages=find_packages(exclude=["examples", "examples.*"]),
    include_package_data=True,

    # Allows `setup.py test` to work correctly with pytest
    setup_requires=[] + pytest_runner,
    install_requires=install_requires,
    extras_require={"test": ["pytest", "pytest-cov"]},
    entry_points={"console_scripts": ["realpg = realpg.app.cli:cli"]},
    python_requires=">=3.8",
)
