from . import bclr, gibbs, mvn, pg, tempering  # noqa
