"""Builds the native extension with cargo; no setuptools-rust needed.

Use `pip install -e . --no-build-isolation` for a development install.
"""

import shutil
import subprocess
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

ROOT = Path(__file__).resolve().parent


class CargoExtension(Extension):
    def __init__(self, name: str, package: str):
        super().__init__(name, sources=[])
        self.package = package


class CargoBuildExt(build_ext):
    def build_extension(self, ext: CargoExtension) -> None:
        subprocess.run(
            ["cargo", "build", "--release", "-p", ext.package],
            cwd=ROOT,
            check=True,
        )
        built = ROOT / "target" / "release" / f"lib{ext.name}.so"
        dest = Path(self.get_ext_fullpath(ext.name))
        dest.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(built, dest)


setup(
    ext_modules=[CargoExtension("metricbv_py", package="metricbv-py")],
    cmdclass={"build_ext": CargoBuildExt},
)
