import logging

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


class RunLogHandler(logging.Handler):
    """This class collects the log records emitted during a scenario run so that they can be saved
    along with the run artifacts.
    """

    def __init__(self):

        super().__init__()

        self.setFormatter(logging.Formatter(LOG_FORMAT))

        self._messages = []

    def emit(self, record):

        self._messages.append(self.format(record))

    @property
    def messages(self):
        """Return the formatted messages collected so far.
        """

        return list(self._messages)

    def save(self, filename):
        """Save the logger contents to a file
        """

        with open(filename, 'w') as fout:
            fout.write('\n'.join(self._messages))
            if self._messages:
                fout.write('\n')


def setup_logging(verbose=False):
    """Configure the root logger of the command line.
    """

    logging.basicConfig(format=LOG_FORMAT, level=logging.DEBUG if verbose else logging.INFO)
