from bluec.elaborator.elaborate import Elaborator, elaborate, static_eval
from bluec.elaborator.fsm import build_machine

__all__ = ["Elaborator", "elaborate", "static_eval", "build_machine"]
