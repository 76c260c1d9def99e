import dataclasses

import numpy as np
import pandas as pd

from kleinsim.kernel.errors import KleinSimError
from kleinsim.kernel.parameters import PARAMETERS


class FrameError(KleinSimError):
    """Error handler for Frame related exceptions.
    """


@dataclasses.dataclass(frozen=True, eq=False)
class Frame:
    """A snapshot of a run: densities sampled on the grid plus the scalar expectation values.

    All densities are normalized so that the total density integrates to 1 over the grid.
    """

    time: float
    density: np.ndarray
    density_plus: np.ndarray
    density_minus: np.ndarray
    local_p: np.ndarray
    mean_x: float
    mean_p: float
    mean_sigma_x: float
    variance_x: float
    positive_population: float
    energy: float

    @property
    def negative_population(self):
        """Return the population of the negative energy branch.
        """

        return 1.0 - self.positive_population

    def to_dataframe(self, x):
        """Return the sampled columns of the frame.

        Args:
            x (numpy.ndarray): the grid positions

        Returns:
            pandas.DataFrame: the frame with columns x, density, density_plus, density_minus and local_p
        """

        return pd.DataFrame({'x': x,
                             'density': self.density,
                             'density_plus': self.density_plus,
                             'density_minus': self.density_minus,
                             'local_p': self.local_p})


class FrameSeries:
    """This class stores the ordered frames of a run together with the grid, the Dirac parameters
    and the final state of the run.
    """

    def __init__(self, grid, params, engine='dirac'):

        self._grid = grid

        self._params = params

        self._engine = engine

        self._frames = []

        self._final_state = None

    def __getitem__(self, index):

        return self._frames[index]

    def __iter__(self):

        return iter(self._frames)

    def __len__(self):

        return len(self._frames)

    def append(self, frame, tolerance=None):
        """Append a frame to the series after checking its consistency.

        Args:
            frame (kleinsim.kernel.frames.Frame): the frame
            tolerance (float): the tolerance on the normalization of the densities
        """

        tolerance = PARAMETERS['norm tolerance'] if tolerance is None else tolerance

        if self._frames and frame.time <= self._frames[-1].time:
            raise FrameError('Frame times must be strictly increasing ({} after {})'.format(frame.time, self._frames[-1].time))

        total = self._grid.integrate(frame.density)
        if abs(total - 1.0) > tolerance:
            raise FrameError('The density of frame at t={} integrates to {}'.format(frame.time, total))

        branches = self._grid.integrate(frame.density_plus) + self._grid.integrate(frame.density_minus)
        if abs(branches - total) > tolerance:
            raise FrameError('The branch densities of frame at t={} do not sum to the total density'.format(frame.time))

        self._frames.append(frame)

    @property
    def engine(self):
        """Getter for _engine attribute.
        """

        return self._engine

    @property
    def final_state(self):
        """Getter for _final_state attribute.
        """

        return self._final_state

    @final_state.setter
    def final_state(self, state):
        """Setter for _final_state attribute.
        """

        self._final_state = state

    @property
    def frames(self):
        """Return the frames as a tuple.
        """

        return tuple(self._frames)

    @property
    def grid(self):
        """Getter for _grid attribute.
        """

        return self._grid

    def observable(self, name):
        """Return the values of a scalar observable over the frames.

        Args:
            name (str): the name of the frame field (e.g. 'mean_x')

        Returns:
            numpy.ndarray: the values
        """

        return np.array([getattr(frame, name) for frame in self._frames])

    @property
    def params(self):
        """Getter for _params attribute.
        """

        return self._params

    @property
    def times(self):
        """Return the times of the frames in us.
        """

        return self.observable('time')

    def summary(self):
        """Return the scalar observables of the series.

        Returns:
            pandas.DataFrame: one row per frame
        """

        columns = ['time', 'mean_x', 'mean_p', 'mean_sigma_x', 'variance_x', 'positive_population', 'energy']

        return pd.DataFrame({column: self.observable(column) for column in columns})
