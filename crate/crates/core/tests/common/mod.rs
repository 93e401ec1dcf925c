#![allow(dead_code)]

pub mod geometry_suite;
