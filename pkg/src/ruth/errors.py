"""Exception classes shared across the package."""


class RuthError(Exception):
    """Base class for everything this package raises on purpose."""


# groupoid axioms -----------------------------------------------------------

class AxiomViolation(RuthError):
    """A groupoid, action or functor fails an axiom.

    ``witnesses`` names the offending ids; ``violations`` (set on the raised
    instance by the validators) lists every violation found, not just the first.
    """

    def __init__(self, message, witnesses=()):
        super().__init__(message)
        self.witnesses = tuple(witnesses)
        self.violations = [self]


class MissingComposite(AxiomViolation):
    pass


class BadComposite(AxiomViolation):
    """A composition entry for a non-composable pair, or with the wrong endpoints."""


class NonAssociative(AxiomViolation):
    pass


class BadUnit(AxiomViolation):
    pass


class BadInverse(AxiomViolation):
    pass


class InvalidAction(AxiomViolation):
    pass


class NotAFunctor(AxiomViolation):
    pass


class IndexOutOfRange(RuthError, IndexError):
    pass


# representations -----------------------------------------------------------

class DegreeViolation(RuthError):
    """A tensor has entries outside the blocks allowed by its degree."""


class TruncationViolation(DegreeViolation):
    """Nonzero R_k (or Phi_k) above the bound where the Hom bundle vanishes."""


class StructureEquationsViolated(RuthError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class InvalidMorphism(RuthError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NotLeibniz(RuthError):
    pass


class NotStrict(RuthError):
    pass


class NotUnital(RuthError):
    pass


# homotopy engine -----------------------------------------------------------

class NotAcyclic(RuthError):
    def __init__(self, obj, degree, dim):
        super().__init__("fiber cohomology of dimension %d at object %r, degree %d" % (dim, obj, degree))
        self.obj = obj
        self.degree = degree
        self.dim = dim


class NotQuasiIso(RuthError):
    def __init__(self, obj, degree):
        super().__init__("Phi_0 is not a quasi-isomorphism at object %r, degree %d" % (obj, degree))
        self.obj = obj
        self.degree = degree


class OrbitDimMismatch(RuthError):
    pass


class NotFree(RuthError):
    pass


# interchange format --------------------------------------------------------

class SchemaError(RuthError):
    def __init__(self, message, path="$"):
        super().__init__("%s: %s" % (path, message))
        self.path = path


class DanglingReference(SchemaError):
    pass
