"""
Проектирование ODMTS (автобусные хабы + шаттлы первой и последней мили)
с учётом принятия сервиса латентными пассажирами.
"""

__version__ = "0.1.0"
