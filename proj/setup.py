# Copyright 2026 The isetk Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""CMake-driven build of the isetk._core extension.

The native build is a plain CMake project; this shim makes `pip install .`
(and `pip install -e . --no-build-isolation`) configure and build it, then
collect the extension into the wheel.
"""

import os
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name: str):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext: CMakeExtension) -> None:
        source_dir = Path(__file__).resolve().parent
        build_dir = Path(self.build_temp) / "cmake"
        build_dir.mkdir(parents=True, exist_ok=True)
        out_dir = Path(self.get_ext_fullpath(ext.name)).resolve().parent

        configure = [
            "cmake",
            "-S", str(source_dir),
            "-B", str(build_dir),
            "-DSKBUILD=ON",
            "-DISETK_BUILD_PYTHON=ON",
            f"-DPython3_EXECUTABLE={sys.executable}",
            "-DCMAKE_BUILD_TYPE=Release",
        ]
        if os.environ.get("CMAKE_GENERATOR") is None and _have("ninja"):
            configure += ["-G", "Ninja"]
        subprocess.run(configure, check=True)
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "_core", "-j"],
            check=True,
        )

        built = list((build_dir / "python" / "isetk").glob("_core*.so"))
        if not built:
            raise RuntimeError("cmake did not produce the _core extension")
        out_dir.mkdir(parents=True, exist_ok=True)
        self.copy_file(str(built[0]), str(out_dir / built[0].name))


def _have(tool: str) -> bool:
    from shutil import which

    return which(tool) is not None


setup(
    packages=["isetk"],
    package_dir={"isetk": "python/isetk"},
    ext_modules=[CMakeExtension("isetk._core")],
    cmdclass={"build_ext": CMakeBuild},
)
