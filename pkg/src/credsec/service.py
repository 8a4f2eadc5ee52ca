"""Wiring: build a full authority + stores + service stack from a Config."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .authority import Cta
from .cms import Cms
from .config import Config
from .httpapi import HttpAuthority
from .ledger import Ledger
from .lds import Lds


@dataclass
class Stack:
    config: Config
    cta: Cta | None  # None when the authority lives in another process
    lds: Lds
    ledger: Ledger
    cms: Cms


def build_stack(config: Config, rng: random.Random | None = None) -> Stack:
    lds = Lds(config.lds_root)
    ledger = Ledger(config.ledger_path)
    if config.cta_endpoint:
        cta = None
        directory = HttpAuthority(config.cta_endpoint)
    else:
        cta = Cta(bits=config.rsa_bits, K=config.dummy_budget, rng=rng,
                  exponent_mode=config.exponent_mode,
                  chunk_digits=config.chunk_digits)
        directory = cta
    cms = Cms(lds, ledger, directory, session_ttl=config.session_ttl)
    if cta is not None:
        cta.cms_sink = cms.cta_forward
    return Stack(config=config, cta=cta, lds=lds, ledger=ledger, cms=cms)
