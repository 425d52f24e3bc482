from setuptools import setup, find_packages
from pathlib import Path

# see https://packaging.python.org/guides/single-sourcing-package-version/
version_dict = {}
with open(Path(__file__).parents[0] / "foamopt/_version.py") as fp:
    exec(fp.read(), version_dict)
version = version_dict["__version__"]
del version_dict

setup(
    name="foamopt",
    version=version,
    description="foamopt optimizes conforming open-cell Voronoi foams for stiffness with seed positions and beam radii as design variables.",
    python_requires=">=3.8",
    packages=find_packages(include=["foamopt", "foamopt.*"]),
    entry_points={
        # make the scripts available as command line scripts
        "console_scripts": [
            "foamopt = foamopt.scripts.cli:main",
        ]
    },
    install_requires=[
        "numpy",
        "scipy>=1.8",
        "scikit-image>=0.19",
        "tqdm",
        "torch>=1.12",
        "pyyaml",
        "torch-runstats>=0.2.0",
    ],
    extras_require={"test": ["pytest"]},
    zip_safe=True,
)
