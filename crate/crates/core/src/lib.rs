// SPDX-License-Identifier: Apache-2.0

pub mod model;
pub mod spectral;
pub mod integrator;
pub mod phases;
pub mod geometry;
pub mod scenario;
