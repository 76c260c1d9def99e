import collections

# Global variable which contains the numerical defaults of the application
# Lengths are in Delta, times in microseconds, angular frequencies in rad/us
PARAMETERS = collections.OrderedDict()
PARAMETERS['grid points'] = 2048
PARAMETERS['x min'] = -64.0
PARAMETERS['x max'] = 64.0
PARAMETERS['time step'] = 1.0
PARAMETERS['fock cutoff'] = 256
PARAMETERS['krylov tolerance'] = 1.0e-10
PARAMETERS['krylov max dimension'] = 40
PARAMETERS['norm tolerance'] = 1.0e-6
PARAMETERS['initial boundary threshold'] = 1.0e-12
PARAMETERS['boundary threshold'] = 1.0e-8
PARAMETERS['boundary fraction'] = 1.0/32.0
PARAMETERS['separation threshold'] = 1.0e-3
PARAMETERS['cutoff guard'] = 1.0e-6
PARAMETERS['cutoff guard fraction'] = 0.05
PARAMETERS['purity threshold'] = 1.0e-3
PARAMETERS['branch filter leakage'] = 0.02
PARAMETERS['k max'] = 6.0
PARAMETERS['n k'] = 256
PARAMETERS['momentum window'] = 1.0
PARAMETERS['quadratic ratio warning'] = 0.15
PARAMETERS['dense dimension cap'] = 256
