import numpy as np

from kleinsim.kernel.errors import KleinSimError
from kleinsim.kernel.parameters import PARAMETERS


class GridError(KleinSimError):
    """Error handler for Grid related exceptions.
    """


class Grid:
    """This class defines the uniform periodic grid on which the spinors are sampled.

    Positions are in units of Delta and momenta in units of hbar/Delta. The momentum grid is
    the discrete Fourier dual of the position grid, in numpy FFT ordering.
    """

    def __init__(self, n_points=None, x_min=None, x_max=None):
        """Constructor

        Args:
            n_points (int): the number of grid points, a power of two not smaller than 16
            x_min (float): the lower bound of the grid (included)
            x_max (float): the upper bound of the grid (excluded)
        """

        n_points = PARAMETERS['grid points'] if n_points is None else int(n_points)
        x_min = PARAMETERS['x min'] if x_min is None else float(x_min)
        x_max = PARAMETERS['x max'] if x_max is None else float(x_max)

        if n_points < 16 or n_points & (n_points - 1):
            raise GridError('The number of grid points must be a power of two >= 16 (got {})'.format(n_points))

        if x_max <= x_min:
            raise GridError('Invalid grid bounds [{},{}]'.format(x_min, x_max))

        self._n_points = n_points

        self._x_min = x_min

        self._x_max = x_max

        self._dx = (x_max - x_min)/n_points

        self._x = x_min + self._dx*np.arange(n_points)
        self._x.flags.writeable = False

        self._p = 2.0*np.pi*np.fft.fftfreq(n_points, d=self._dx)
        self._p.flags.writeable = False

    def __eq__(self, other):

        if not isinstance(other, Grid):
            return NotImplemented

        return self.key == other.key

    def __hash__(self):

        return hash(self.key)

    def __repr__(self):

        return 'Grid(n_points={}, x_min={}, x_max={})'.format(self._n_points, self._x_min, self._x_max)

    def boundary_mask(self, fraction=None):
        """Return a mask selecting the outer strips of the grid on both sides.

        Args:
            fraction (float): the fraction of the grid covered by each strip

        Returns:
            numpy.ndarray: the boolean mask
        """

        fraction = PARAMETERS['boundary fraction'] if fraction is None else fraction

        width = max(1, int(round(fraction*self._n_points)))

        mask = np.zeros(self._n_points, dtype=bool)
        mask[:width] = True
        mask[-width:] = True

        return mask

    @property
    def dp(self):
        """Return the momentum resolution 2*pi/(n_points*dx).
        """

        return 2.0*np.pi/(self._n_points*self._dx)

    @property
    def dx(self):
        """Getter for _dx attribute.
        """

        return self._dx

    @property
    def extent(self):
        """Return the length of the grid.
        """

        return self._x_max - self._x_min

    def integrate(self, values):
        """Integrate sampled values over the grid.

        Args:
            values (numpy.ndarray): the values sampled on the grid

        Returns:
            float or complex: the integral
        """

        return np.sum(values)*self._dx

    @property
    def key(self):
        """Return the tuple which identifies the grid.
        """

        return (self._n_points, self._x_min, self._x_max)

    @property
    def n_points(self):
        """Getter for _n_points attribute.
        """

        return self._n_points

    @property
    def p(self):
        """Getter for _p attribute.
        """

        return self._p

    @property
    def x(self):
        """Getter for _x attribute.
        """

        return self._x

    @property
    def x_max(self):
        """Getter for _x_max attribute.
        """

        return self._x_max

    @property
    def x_min(self):
        """Getter for _x_min attribute.
        """

        return self._x_min
