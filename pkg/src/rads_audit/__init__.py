"""Toolkit for auditing how mobile apps honor the right of access by the data subject."""

from .capture import (CaptureRecord, CapturedProfile, DataCategory, build_profile,
                      canonicalize, ingest_capture_csv)
from .completeness import (AppCompletenessResult, ConsistencyStatus, aggregate_consistency,
                           compare, missing_rate_histogram, pair_location)
from .copy_parser import (CopyFormat, DescriptorDictionary, FlatRecord, detect_format,
                          match_categories, parse_csv_copy, parse_json_copy)
from .errors import DataError, ExternalServiceError, LlmParseError, RadsAuditError
from .ledger import (AccessRequest, AccessRight, FeedbackBucket, Ledger, Outcome,
                     UiDepthRecord, authenticity_summary, bucket_duration, ui_depth_histogram)
from .llm import LlmHandle, ReplayTransport, make_llm
from .metrics import MetricsReport, evaluate_classifier
from .paragraphs import (CategoryLabel, ClassifiedParagraph, RadsExcerpt, classify_paragraph,
                         extract_rads_paragraphs, keyword_baseline_classify)
from .policy_ingest import (Paragraph, PolicyDocument, RawPolicy, fetch_policy,
                            html_to_plaintext, segment_paragraphs)
from .report import (ComplianceReport, Proportion, aggregate_methods, aggregate_rads,
                     build_report, emit_report)
from .rights import (LlmAnswer, MethodKind, RadsFinding, RightAnswer, RightsClass,
                     build_prompt, decide_rads, identify, parse_llm_response, translate_excerpt)

__version__ = "0.1.0"
