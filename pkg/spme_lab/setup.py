from setuptools import setup

package_name = "spme_lab"

setup(
    name=package_name,
    version="0.1.0",
    packages=[package_name],
    data_files=[
        ("share/" + package_name + "/config", ["config/spme_defaults.yaml", "config/acceptance.yaml"]),
    ],
    install_requires=["setuptools", "numpy>=1.22", "scipy>=1.8", "PyYAML>=6.0"],
    python_requires=">=3.10",
    zip_safe=True,
    maintainer="spme_lab contributors",
    maintainer_email="spme-lab@users.noreply.github.com",
    description="Numerical laboratory for the stochastic porous medium equation driven by space-time white noise",
    license="MIT",
    tests_require=["pytest"],
    entry_points={
        "console_scripts": [
            "spme_lab = spme_lab.cli:main",
        ],
    },
)
