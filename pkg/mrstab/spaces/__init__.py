from mrstab.spaces.words import *
from mrstab.spaces.group_spec import *
from mrstab.spaces.tilings import *
from mrstab.spaces.orbits import *
from mrstab.spaces.relhyp import *
