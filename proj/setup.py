"""Build the compiled extension hocr._hocr from the C++ core sources."""

from pathlib import Path

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

sources = sorted(
    p.as_posix() for p in Path("src").glob("*.cpp") if p.name != "main.cpp"
)

ext = Pybind11Extension(
    "hocr._hocr",
    sources=sources,
    include_dirs=["include", "vendor"],
    cxx_std=20,
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
