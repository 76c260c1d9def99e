import logging


class ProgressBar:
    """This class implements a progress bar for the whole application.

    Progress goes to a callback when one is attached, to the log otherwise.
    """

    _instance = None

    def __new__(class_, *args, **kwargs):
        if not isinstance(class_._instance, class_):
            class_._instance = object.__new__(class_, *args, **kwargs)
        return class_._instance

    def __init__(self):

        self._callback = None

        self._n_steps = 0

    def set_callback(self, callback):
        """Attach a callback called with (step, n_steps) at each update, None to detach it.
        """

        self._callback = callback

    def reset(self, n_steps):
        """Initializes the progress bar.

        Args:
            n_steps (int): the total number of steps of the task to monitor
        """

        self._n_steps = n_steps

    def update(self, step):
        """Updates the progress bar.

        Args:
            step (int): the step
        """

        if self._callback is not None:
            self._callback(step, self._n_steps)
            return

        if self._n_steps:
            logging.info('Progress: {}/{} ({:.0f}%)'.format(step, self._n_steps, 100.0*step/self._n_steps))


progress_bar = ProgressBar()
