//! Structure discovery for spreadsheets: cell model, formulas, a fact base
//! over cells, layout grammars and the transforms that turn matched cells
//! into named, indexed attributes.
#![no_std]

extern crate alloc;

pub mod address;
pub mod arrows;
pub mod factbase;
pub mod fixtures;
pub mod formula;
pub mod grammar;
pub mod number;
pub mod workbook;

pub use address::Address;
pub use number::Number;
pub use workbook::{CellContent, Formula, Workbook};
