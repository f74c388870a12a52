"""
CLI скрипт для запуска проектирования ODMTS.
"""

import sys
from pathlib import Path

# Добавляем корневую директорию в путь
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.cli import main


if __name__ == "__main__":
    if len(sys.argv) < 2:
        print("Использование: python scripts/run_pipeline_cli.py <подкоманда> [флаги]")
        print("Пример: python scripts/run_pipeline_cli.py solve --instance data/toy_3hub.json --follower lex")
        sys.exit(1)

    sys.exit(main(sys.argv[1:]))
