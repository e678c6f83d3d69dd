"""Funniness regression for micro-edited news headlines.

Embedding -> BiLSTM -> batch norm -> linear head, trained with RMSprop in
plain numpy, plus the Task-1/Task-2 scoring used by the Humicroedit shared
task.
"""

__version__ = "0.1.0"
