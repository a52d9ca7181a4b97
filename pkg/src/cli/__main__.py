"""
Post-editing need pipeline.

Example use:
python3 -m cli --project runs/en_it init
python3 -m cli --project runs/en_it ingest data/synthetic_en_it.tsv --lang-pair en-it
python3 -m cli --project runs/en_it split
python3 -m cli --project runs/en_it --backend baseline predict
python3 -m cli --project runs/en_it eval
python3 -m cli savings --matrix 256,46,442,90 --pay-rate 0.10
"""

import sys

from cli.main import main

if __name__ == "__main__":
    sys.exit(main())
