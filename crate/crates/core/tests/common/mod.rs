#![allow(dead_code)]

pub mod dual;
pub mod series;
