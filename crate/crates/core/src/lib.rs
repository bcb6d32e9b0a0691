//! Left-orderability search for finitely presented groups.

pub mod abelian;
pub mod enumerate;
pub mod obstruct;
pub mod order;
pub mod rewrite;
pub mod subgrp;
pub mod words;
