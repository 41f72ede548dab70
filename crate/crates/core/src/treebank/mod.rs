//! Bracketed constituency treebanks: reading, shift-schema matching and
//! minimal-pair realization.
//!
//! Schemas, checked on the first two non-empty children after a VP's head
//! verb:
//!
//! | shift | surface orders accepted | unshifted form    |
//! |-------|-------------------------|-------------------|
//! | HNPS  | NP PP, PP NP            | V NP PP           |
//! | PM    | PRT NP, NP PRT          | V PRT NP          |
//! | DA    | NP NP                   | V NP1 NP2         |
//! | MPP   | PP PP                   | V PP1 PP2 (as found) |

mod lemma;
mod matcher;
mod mine;
mod realize;
mod tree;

pub use lemma::verb_lemma;
pub use matcher::{match_shift_pattern, schema_accepts, ShiftMatch};
pub use mine::{mine, mine_with, realize_all, QualityFilter, Rejection};
pub use realize::{detokenize, realize_pair, RealizeError};
pub use tree::{category_of, parse_treebank, ParseError, ParseErrorKind, ParseNode, Span, EMPTY_CATEGORY};
