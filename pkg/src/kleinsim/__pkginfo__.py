# **************************************************************************
#
# kleinsim
#
# **************************************************************************

__description__ = "A simulator of Klein tunneling with the Dirac equation and its trapped-ion analogue"

__long_description__ = """kleinsim solves the 1D Dirac equation with engineered potentials, emulates the
two-ion analogue quantum simulator including its measurement protocol, and compares both against the
closed-form Landau-Zener tunneling predictions."""

__author__ = "E.C. Pellegrini"

__author_email__ = "ericpellegrini76@gmail.com"

__maintainer__ = "E.C. Pellegrini"

__maintainer_email__ = "ericpellegrini76@gmail.com"

__license__ = "GPL 3"

__version__ = "0.1.1"
