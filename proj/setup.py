import os
import subprocess
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    """Drives the repository's CMake build to produce the extension module."""

    def build_extension(self, ext):
        out = os.path.abspath(os.path.dirname(self.get_ext_fullpath(ext.name)))
        source = os.path.abspath(os.path.dirname(__file__))
        build_dir = os.path.join(self.build_temp, "cmake")
        os.makedirs(build_dir, exist_ok=True)
        cfg = "Debug" if self.debug else "Release"
        subprocess.run(
            [
                "cmake",
                "-S", source,
                "-B", build_dir,
                f"-DCMAKE_BUILD_TYPE={cfg}",
                "-DSDNIOC_PYTHON=ON",
                f"-DPython3_EXECUTABLE={sys.executable}",
                f"-DCMAKE_LIBRARY_OUTPUT_DIRECTORY={out}",
            ],
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", build_dir, "--target", "_sdnioc"], check=True
        )


setup(
    ext_modules=[CMakeExtension("sdnioc._sdnioc")],
    cmdclass={"build_ext": CMakeBuild},
)
