"""tablink: table structure extraction and text-to-table linking.

The pipeline turns HTML financial reports into ordered blocks and
normalized table grids, serializes cells with row context, classifies
them into metadata/header/attribute/data, snaps predicted row label
sequences to mined patterns, and links descriptive sentences to the
cells they talk about.
"""
from .adapter import (
    AdapterClient,
    AdapterSpec,
    AdapterUnavailable,
    ProtocolViolation,
)
from .classify import (
    EmptyCorpus,
    MissingClass,
    NaiveBayesCellClassifier,
    NotFitted,
    Prediction,
    classify_batch,
    train_baseline,
    uniform_scores,
)
from .corpus import (
    CellRecord,
    ClassifierConfig,
    ConfigError,
    CorpusSchemaError,
    PipelineConfig,
    cell_records_from_document,
    default_config,
    document_to_dict,
    group_rows,
    link_result_to_dict,
    load_config,
    parse_config,
    read_cell_records,
    read_links,
    read_predictions,
    serialize_records,
    write_cell_records,
    write_links,
    write_predictions,
)
from .document import (
    BadBlockIndex,
    Cell,
    Document,
    Paragraph,
    RawCell,
    TableGrid,
    TableRef,
    UnreadableInput,
    decode_html,
    normalize_grid,
    parse_document,
)
from .evaluate import (
    EmptyGold,
    Histogram,
    Lcg,
    RoleScore,
    TdeScore,
    TtreScore,
    eval_tde,
    eval_ttre,
    histogram_of_texts,
    random_baseline,
    render_histogram,
    table_key,
    token_histogram,
)
from .labels import CANONICAL_ORDER, CellLabel
from .linker import (
    DEFAULT_BRACKET_PAIRS,
    DEFAULT_PARTICLES,
    Fragment,
    LinkResult,
    LinkerConfig,
    NameMatch,
    candidate_region,
    filter_values,
    find_names,
    find_values,
    link_document,
    link_paragraph,
    numeric_ratio,
    segment_description,
    similarity,
)
from .patterns import (
    EditOp,
    EmptyPrediction,
    PatternBank,
    RowPatternCorrector,
    backtrace,
    build_pattern_bank,
    correct_row,
    correct_table,
    levenshtein,
    load_pattern_bank,
    save_pattern_bank,
)
from .serialize import (
    OutOfBounds,
    SerializedExample,
    SerializerConfig,
    count_tokens,
    serialize_cell,
    serialize_table,
    serialize_texts,
    tokenize,
)

__version__ = "0.1.0"
