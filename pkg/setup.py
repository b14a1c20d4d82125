import json
from setuptools import setup
from pathlib import Path

here = Path(__file__).parent
with open(here / 'elliptest' / 'package-info.json') as f:
    package = json.load(f)
long_description = (here / 'README.md').read_text()

package_name = package["name"].replace(" ", "_").replace("-", "_")

setup(
    name=package_name,
    version=package["version"],
    author=package['author'],
    packages=[package_name],
    include_package_data=True,
    package_data={package_name: ['package-info.json', 'presets/*.yaml']},
    license=package['license'],
    description=package.get('description', package_name),
    long_description=long_description,
    long_description_content_type="text/markdown",
    python_requires='>=3.9',
    install_requires=[
        'numpy>=2.0',
        'scipy>=1.13',
        'pandas>=2.2',
        'click>=8.1',
        'coloredlogs>=15.0',
        'PyYAML>=6.0',
        'multiprocess>=0.70.16',
        'psutil>=5.9',
    ],
    entry_points={
        'console_scripts': ['elliptest = elliptest.cli:main'],
    },
    classifiers = [
        'Topic :: Scientific/Engineering :: Mathematics',
    ],    
)
