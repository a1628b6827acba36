//! Domain types shared by every pipeline stage: the reverse-engineered class
//! model, the filtered component model and hierarchical state machines.
//!
//! All types serialize to JSON with a stable field order; that JSON is the
//! interchange format between stages.

mod class;
mod reach;
mod state;
mod typology;
mod validate;

pub use class::{
    Association, AssociationKind, Attribute, ClassDecl, ClassModel, ComponentModel, Operation,
    Parameter, Visibility,
};
pub use reach::{reachable_states, ReachError};
pub use state::{
    Region, RegionKey, RegionRef, State, StateKind, StateMachine, StateRef, Transition,
    TransitionRef, TriggerFamily, TriggerLabel,
};
pub use typology::{Typology, UnknownTypology};
pub use validate::{validate_class_model, validate_component_model, validate_state_machine, Violation};
