# coding: utf-8
"""
Worker pool for independent chains and benchmark replicates.

Tasks are MiniHuey tasks running as greenlets inside a flask app context. The
numerical work of each task is handed to the gevent hub threadpool so several of
them make progress at once; the threadpool size is the parallelism cap set with
`set_threads`.
"""
import os
from functools import wraps

import gevent
from huey.contrib.mini import MiniHuey

from bcmlr.app import create_worker_app

app = create_worker_app()
huey = MiniHuey(pool_size=app.config['WORKER_POOL_SIZE'])


def huey_task(*huey_args):
    "Wraps a function to make it a MiniHuey task that is run inside a flask app context."

    huey_decorator = huey.task(*huey_args)

    def with_context(f):

        @wraps(f)
        def decorator(*args, **kwargs):
            # run the task inside an app context and log start and finish
            with app.app_context():
                fargs = ' '.join([_describe(arg) for arg in args])
                fkwargs = ' '.join([f'{k}={_describe(v)}' for (k, v) in kwargs.items()])

                app.logger.info("STARTING %s %s %s", f.__name__, fargs, fkwargs)

                try:
                    result = f(*args, **kwargs)
                    app.logger.info("FINISHED %s %s %s", f.__name__, fargs, fkwargs)
                    return result
                except Exception:
                    app.logger.exception("ERRORED %s %s %s", f.__name__, fargs, fkwargs)
                    # the caller gets the exception back from the task result
                    raise

        return decorator

    def composed_decorator(f):
        return huey_decorator(with_context(f))

    return composed_decorator


def _describe(arg):
    if callable(arg):
        return getattr(arg, '__name__', repr(arg))
    text = str(arg)
    return text if len(text) < 80 else text[:77] + '...'


def default_threads():
    return len(os.sched_getaffinity(0)) if hasattr(os, 'sched_getaffinity') else os.cpu_count()


def set_threads(threads=None):
    "Cap the number of tasks computing at the same time."
    threads = threads or default_threads()
    gevent.get_hub().threadpool.maxsize = threads
    app.logger.debug('worker threadpool size set to %s', threads)


@huey_task()
def compute(fn, *args, **kwargs):
    "Run `fn(*args, **kwargs)` on the worker threadpool."
    return gevent.get_hub().threadpool.apply(fn, args, kwargs)


def map_tasks(fn, arg_tuples):
    """
    Submit `fn(*args)` for every tuple in `arg_tuples` and wait for all of them.
    Results come back in submission order; the first failure is raised.
    """
    pending = [compute(fn, *args) for args in arg_tuples]
    return [result.get() for result in pending]
