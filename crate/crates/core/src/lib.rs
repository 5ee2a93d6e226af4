//! Preference-driven review summarization with online profile learning.
//!
//! Sentences are mapped to soft memberships over K latent aspects, a
//! diversity-aware selector picks evidence under a token budget, and an
//! entropic mirror-descent learner updates a user's aspect profile from
//! scalar feedback on each summary.

pub mod aspect;
pub mod catalog;
pub mod corpus;
pub mod preference;
pub mod rng;
pub mod selection;
pub mod simplex;
pub mod simulation;
pub mod summarizer;
