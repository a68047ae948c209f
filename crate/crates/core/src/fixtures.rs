//! Reference models used across the test suites and benchmarks.

use crate::format::parse_model;
use crate::model::Tioa;

pub const A1: &str = include_str!("../fixtures/a1.ta");
pub const A1_PRIME: &str = include_str!("../fixtures/a1prime.ta");
pub const A1_CORE: &str = include_str!("../fixtures/a1_core.ta");
pub const A1_PRIME_CORE: &str = include_str!("../fixtures/a1prime_core.ta");
pub const CUSTOMER: &str = include_str!("../fixtures/customer.ta");
pub const F3_A0: &str = include_str!("../fixtures/f3_a0.ta");
pub const F3_A1: &str = include_str!("../fixtures/f3_a1.ta");
pub const F3_A2: &str = include_str!("../fixtures/f3_a2.ta");
pub const F3_A3: &str = include_str!("../fixtures/f3_a3.ta");
pub const F5_A1: &str = include_str!("../fixtures/f5_a1.ta");
pub const F5_A2: &str = include_str!("../fixtures/f5_a2.ta");
pub const F5_A3: &str = include_str!("../fixtures/f5_a3.ta");
pub const F5_A4: &str = include_str!("../fixtures/f5_a4.ta");
pub const F5_A5: &str = include_str!("../fixtures/f5_a5.ta");
pub const WEAK_DETERM: &str = include_str!("../fixtures/weak_determ.ta");
pub const COMP_SP1: &str = include_str!("../fixtures/comp_sp1.ta");
pub const COMP_IM1: &str = include_str!("../fixtures/comp_im1.ta");
pub const COMP_SP2: &str = include_str!("../fixtures/comp_sp2.ta");
pub const COMP_IM2: &str = include_str!("../fixtures/comp_im2.ta");

pub const ALL: &[&str] = &[
    A1,
    A1_PRIME,
    A1_CORE,
    A1_PRIME_CORE,
    CUSTOMER,
    F3_A0,
    F3_A1,
    F3_A2,
    F3_A3,
    F5_A1,
    F5_A2,
    F5_A3,
    F5_A4,
    F5_A5,
    WEAK_DETERM,
    COMP_SP1,
    COMP_IM1,
    COMP_SP2,
    COMP_IM2,
];

fn must(text: &str) -> Tioa {
    parse_model(text).expect("fixture must parse")
}

pub fn machine() -> Tioa {
    must(A1)
}

pub fn machine_variant() -> Tioa {
    must(A1_PRIME)
}

pub fn machine_core() -> Tioa {
    must(A1_CORE)
}

pub fn machine_core_variant() -> Tioa {
    must(A1_PRIME_CORE)
}

pub fn customer() -> Tioa {
    must(CUSTOMER)
}

pub fn f3_a0() -> Tioa {
    must(F3_A0)
}

pub fn f3_a1() -> Tioa {
    must(F3_A1)
}

pub fn f3_a2() -> Tioa {
    must(F3_A2)
}

pub fn f3_a3() -> Tioa {
    must(F3_A3)
}

pub fn f5_a1() -> Tioa {
    must(F5_A1)
}

pub fn f5_a2() -> Tioa {
    must(F5_A2)
}

pub fn f5_a3() -> Tioa {
    must(F5_A3)
}

pub fn f5_a4() -> Tioa {
    must(F5_A4)
}

pub fn f5_a5() -> Tioa {
    must(F5_A5)
}

pub fn weak_determ() -> Tioa {
    must(WEAK_DETERM)
}

pub fn comp_sp1() -> Tioa {
    must(COMP_SP1)
}

pub fn comp_im1() -> Tioa {
    must(COMP_IM1)
}

pub fn comp_sp2() -> Tioa {
    must(COMP_SP2)
}

pub fn comp_im2() -> Tioa {
    must(COMP_IM2)
}
