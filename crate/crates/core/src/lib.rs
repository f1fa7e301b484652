//! Typechecking and box inference for a capture calculus.
//!
//! The crate provides three engines over one syntax:
//!
//! * [`typecheck`]: the syntax-directed checker,
//! * [`infer`]: box inference that elaborates a program with missing
//!   `box`/`unbox` operations into a well-typed one,
//! * [`infer_t`]: the same inference on types only, predicting the kind and
//!   captured variables of the elaborated term without building it.
//!
//! [`erase`] and [`fsub_typecheck`] give the capture-free image of a program
//! and check it under bounded quantification, for termination comparisons.

pub mod adapt;
pub mod adapt_type;
pub mod alpha;
pub mod checker;
pub mod error;
pub mod fsub;
pub mod normalize;
pub mod parse;
pub mod print;
pub mod subcapture;
pub mod subst;
pub mod subtype;
pub mod syntax;
pub mod typing;
pub mod vars;
pub mod wf;

pub use adapt::{adapt_sub, box_adapt, infer, unbox_var};
pub use adapt_type::{
    adapt_sub_t, adapt_sub_t_with, box_adapt_t, infer_t, infer_t_with, unbox_var_t, AdaptResult,
};
pub use alpha::AlphaEq;
pub use checker::{Checker, Fuel, Options, TFunLeak, DEFAULT_FUEL};
pub use error::{ParseError, ParseErrorKind, TypeError};
pub use fsub::{
    erase, erase_env, erase_shape, erase_term, fsub_subtype, fsub_typecheck, is_erased, FEnv,
    FTerm, FType,
};
pub use normalize::normalize;
pub use parse::{parse_capture_set, parse_env, parse_shape, parse_term, parse_type};
pub use print::{show_env, show_set, show_shape, show_term, show_type};
pub use subcapture::subcapture;
pub use subst::{subst_set, subst_shape, subst_term, subst_type, Subst};
pub use subtype::{subshape, subtype, subtype_capt, var_type, widen_tvar, widen_var};
pub use syntax::{
    cs, kind_of, Binding, CaptureSet, Env, HoledCaptureSet, Kind, NameSupply, Shape, TVar, Term,
    Type, Var,
};
pub use typing::{avoid, typecheck};
pub use vars::{cv, cv_with, fv, fv_type, LetHiding};
pub use wf::{is_simple_formed, wf_env, wf_type};
