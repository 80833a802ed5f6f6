"""Attribute gated continuous group key agreement.

A group messaging key agreement where joining requires proving, in zero
knowledge or by salted disclosure, that your credential satisfies the
group's admission requirements. The package layers a propose-and-commit
group key agreement (`cgka`), anonymous credential schemes over a
pairing friendly curve (`credentials`, `pairing`), the attribute gated
protocol itself (`protocol`), scripted lifecycles (`scenario`), and
security experiments (`games`) behind one CLI (`cli`).
"""

from .cgka import (
    CgkaCommit,
    CgkaState,
    GroupContext,
    GroupError,
    KeyPackage,
    MemberEntry,
    Proposal,
    Welcome,
    cgka_commit,
    cgka_context,
    cgka_create,
    cgka_genkp,
    cgka_init,
    cgka_process_commit,
    cgka_process_welcome,
    cgka_propose,
    secret_fingerprint,
)
from .credentials import (
    Credential,
    CredentialError,
    IssuerPk,
    PkiDirectory,
    Presentation,
    abc_issue,
    abc_keygen,
    abc_prove,
    abc_verify_cred,
    abc_verify_proof,
    pki_init,
    pki_issue,
)
from .games import GameEnv, GameResult, run_game
from .primitives import CryptoError, Rng
from .protocol import (
    AaCommit,
    GroupInfo,
    PresentPackage,
    ProtocolError,
    Requirement,
    ReqsProposal,
    UserState,
    aa_commit,
    aa_create,
    aa_init,
    aa_present,
    aa_process,
    aa_propose,
    aa_propose_reqs,
    aa_publish_info,
    reqs_met,
    update_reqs,
    validate_pp,
)
from .scenario import ScenarioError, ScenarioRunner, random_scenario, run_scenario

__version__ = "0.1.0"

__all__ = [
    "AaCommit",
    "CgkaCommit",
    "CgkaState",
    "Credential",
    "CredentialError",
    "CryptoError",
    "GameEnv",
    "GameResult",
    "GroupContext",
    "GroupError",
    "GroupInfo",
    "IssuerPk",
    "KeyPackage",
    "MemberEntry",
    "PkiDirectory",
    "PresentPackage",
    "Presentation",
    "Proposal",
    "ProtocolError",
    "ReqsProposal",
    "Requirement",
    "Rng",
    "ScenarioError",
    "ScenarioRunner",
    "UserState",
    "Welcome",
    "aa_commit",
    "aa_create",
    "aa_init",
    "aa_present",
    "aa_process",
    "aa_propose",
    "aa_propose_reqs",
    "aa_publish_info",
    "abc_issue",
    "abc_keygen",
    "abc_prove",
    "abc_verify_cred",
    "abc_verify_proof",
    "cgka_commit",
    "cgka_context",
    "cgka_create",
    "cgka_genkp",
    "cgka_init",
    "cgka_process_commit",
    "cgka_process_welcome",
    "cgka_propose",
    "pki_init",
    "pki_issue",
    "random_scenario",
    "reqs_met",
    "run_game",
    "run_scenario",
    "secret_fingerprint",
    "update_reqs",
    "validate_pp",
]
