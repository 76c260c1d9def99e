class KleinSimError(Exception):
    """Base class of all the errors raised by kleinsim.
    """
