"""
Конфигурация проекта.
"""

import os
from pathlib import Path


def _env_flag(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() in {"1", "true", "yes"}


# Пути
PROJECT_ROOT = Path(__file__).parent.parent
DATA_DIR = PROJECT_ROOT / "data"
TOY_INSTANCE_PATH = DATA_DIR / "toy_3hub.json"
OUTPUT_DIR = Path(os.getenv("ODMTS_OUT_DIR", str(PROJECT_ROOT / "runs")))

# Выбор MIP-адаптера: "cbc" (python-mip) или "null" (только экспорт модели)
SOLVER_BACKEND: str = os.getenv("ODMTS_SOLVER", "cbc")

LOG_LEVEL: str = os.getenv("ODMTS_LOG_LEVEL", "INFO")
LOG_FORMAT = "%(asctime)s %(levelname)s - %(message)s"
SHOW_PROGRESS: bool = _env_flag("ODMTS_PROGRESS", "false")

# Абсолютный допуск для сравнений стоимостей путей
EPS = 1e-9

# Ограничители ресурсов
PATH_CAP_PER_TRIP = int(os.getenv("ODMTS_PATH_CAP", str(10**6)))
ORACLE_MAX_UNDECIDED_ARCS = int(os.getenv("ODMTS_ORACLE_MAX_ARCS", "16"))
CPATH_MAX_VARIABLES = int(os.getenv("ODMTS_CPATH_MAX_VARS", str(5 * 10**6)))

# Параметры решателя
DEFAULT_TIME_LIMIT = float(os.getenv("ODMTS_TIME_LIMIT", "3600"))
DEFAULT_MIP_GAP = 1e-4
ORACLE_MIP_GAP = 1e-9  # для сравнения с оракулом
DEFAULT_THREADS = int(os.getenv("ODMTS_THREADS", "1"))

# Лексикографическое преобразование: M_lex = 10^(ceil(log10(T)) + LEX_SCALE_MARGIN)
LEX_SCALE_MARGIN = 2

# Формат файлов экземпляров
INSTANCE_SCHEMA_ID = "odmts-da/1"
TIME_UNITS = ("s", "min")

# Параметры генератора синтетических экземпляров
GENERATOR_AREA_KM = 10.0
GENERATOR_CAR_SPEED_KMH = 40.0
GENERATOR_BUS_SPEED_KMH = 40.0
GENERATOR_HORIZON_MIN = 60.0  # час пик
GENERATOR_FREQUENCY_RANGE = (4, 16)
GENERATOR_ALPHA_RANGE = (1.0, 2.0)
GENERATOR_TRANSFER_TOLERANCE_RANGE = (0, 3)
GENERATOR_RIDERS_RANGE = (1, 5)

# Размер случайного корпуса в приёмочных тестах
ACCEPTANCE_CORPUS_SIZE = int(os.getenv("ODMTS_CORPUS_SIZE", "100"))
# Экземпляры полного размера: 20 остановок, 5 хабов, 12 неопределённых дуг
FULL_SCALE_CORPUS_SIZE = int(os.getenv("ODMTS_FULL_CORPUS_SIZE", "30"))
