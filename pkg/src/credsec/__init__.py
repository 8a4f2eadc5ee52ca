"""Credential management with two-stage envelope encryption, a
tamper-evident ledger, and client-side verification and recovery."""

from .authority import Cta, KeyBundle
from .cms import Cms
from .codec import c2i_decode, c2i_encode
from .config import Config, load_config
from .dna import DnaKey, DnaParams, dna_decode, dna_encode, dna_keygen, dum_discard, dum_gen
from .errors import CredsecError
from .ledger import Ledger, LedgerRecord
from .lds import Lds
from .m2fe import (
    CredentialEnvelope,
    credential_verify,
    envelope_hash,
    envelope_parse,
    envelope_serialize,
    m2fe_decrypt,
    m2fe_encrypt,
)
from .rsa import RsaKeys, RsaParams, rsa_dec, rsa_enc, rsa_keygen, rsa_setup
from .service import Stack, build_stack

__version__ = "0.1.0"

__all__ = [
    "Cms",
    "Config",
    "CredentialEnvelope",
    "CredsecError",
    "Cta",
    "DnaKey",
    "DnaParams",
    "KeyBundle",
    "Ledger",
    "LedgerRecord",
    "Lds",
    "RsaKeys",
    "RsaParams",
    "Stack",
    "build_stack",
    "c2i_decode",
    "c2i_encode",
    "credential_verify",
    "dna_decode",
    "dna_encode",
    "dna_keygen",
    "dum_discard",
    "dum_gen",
    "envelope_hash",
    "envelope_parse",
    "envelope_serialize",
    "load_config",
    "m2fe_decrypt",
    "m2fe_encrypt",
    "rsa_dec",
    "rsa_enc",
    "rsa_keygen",
    "rsa_setup",
]
