import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    # The compiled evaluator is an accelerator only; any build failure
    # falls back to the pure-Python interpreter selected in kernel.py.
    def run(self):
        try:
            build_ext.run(self)
        except Exception as exc:
            print("extension build skipped (%s); using pure-Python kernel" % exc)

    def build_extension(self, ext):
        try:
            build_ext.build_extension(self, ext)
        except Exception as exc:
            print("extension %s skipped (%s); using pure-Python kernel" % (ext.name, exc))


def extensions():
    pyx = os.path.join("src", "protract", "_fastkernel.pyx")
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [Extension("protract._fastkernel", [pyx], extra_compile_args=["-O2"])],
        language_level=3,
    )


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
