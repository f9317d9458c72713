"""Double blind comparisons over encrypted record identifiers.

Two database operators, each holding a differently-encrypted copy of a
secret identifier, can test whether the hidden identifiers are equal
without either operator learning the identifier. A trusted authority
issues the encryptions under caller-chosen blinding and is the only
party that ever sees the identifiers themselves.
"""

from .authority import (
    AuthorityError,
    DuplicateLabelError,
    EntityRegistry,
    IssuanceError,
    IssuanceRequest,
    UnknownLabelError,
)
from .groups import (
    MOCK_DEFAULT_PRIME,
    BackendMismatchError,
    DecodeError,
    DlogUnavailableError,
    GroupBackend,
    GroupElement,
    GroupError,
    MockBackend,
    Side,
    SideMismatchError,
    backend_from_params,
    ddh_check,
    element_from_text,
    element_to_text,
    production_backend,
)
from .harness import (
    PolicyRule,
    ScenarioError,
    ScenarioScript,
    ScenarioStep,
    apply_response_policy,
    load_script,
    parse_script,
    run_scenario,
)
from .multikey import (
    DimensionKeys,
    DimensionSetup,
    MultiKeyDatabase,
    MultiKeyIndex,
    MultiKeyMatch,
    build_multikey_query,
    enroll_multikey,
    enroll_party_dimensions,
    match_multikey,
    scan_multikey,
    setup_dimensions,
)
from .participant import (
    ComparisonQuery,
    EnrollmentError,
    IndexAttribute,
    ParticipantError,
    ParticipantKey,
    RecordDatabase,
    ScanResult,
    begin_enrollment,
    build_query,
    complete_enrollment,
    derive_dimension_exponent,
    derive_record_exponent,
    enroll_record,
    keygen,
    load_key,
    respond_compare,
    save_key,
    scan_for_match,
)

__version__ = "0.1.0"
