from ._cortexgeo import *  # noqa: F401,F403
