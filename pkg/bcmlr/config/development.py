ENV = 'development'
LOG_LEVEL = 'DEBUG'
