"""Exception hierarchy shared by all modules."""


class PyramaskError(ValueError):
    """Base class for every error raised by this package."""


class SingularDecomposition(PyramaskError):
    pass


class DegeneratePlane(PyramaskError):
    pass


class HorizontalPlane(PyramaskError):
    pass


class ParallelLines(PyramaskError):
    pass


class NonConvexInput(PyramaskError):
    pass


class DegenerateInput(PyramaskError):
    pass


class DegenerateQuad(PyramaskError):
    pass


class EmptyMask(PyramaskError):
    pass


class DimensionMismatch(PyramaskError):
    pass


class EmptyDataset(PyramaskError):
    pass
