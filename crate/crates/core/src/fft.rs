//! Thin 2D FFT layer over `rustfft` with a process-wide plan cache.

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::scalar::{Cplx, Real};

/// Row transforms go parallel above this size.
const PAR_THRESHOLD: usize = 128;

type PlanKey = (TypeId, usize, bool);

fn plan_cache() -> &'static Mutex<HashMap<PlanKey, Arc<dyn Any + Send + Sync>>> {
    static CACHE: OnceLock<Mutex<HashMap<PlanKey, Arc<dyn Any + Send + Sync>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn plan<T: Real>(n: usize, forward: bool) -> Arc<dyn Fft<T>> {
    let key = (TypeId::of::<T>(), n, forward);
    let mut cache = plan_cache().lock().unwrap();
    let entry = cache.entry(key).or_insert_with(|| {
        let mut planner = FftPlanner::<T>::new();
        let dir = if forward { FftDirection::Forward } else { FftDirection::Inverse };
        let plan: Arc<dyn Fft<T>> = planner.plan_fft(n, dir);
        Arc::new(plan) as Arc<dyn Any + Send + Sync>
    });
    entry
        .downcast_ref::<Arc<dyn Fft<T>>>()
        .expect("plan cache type confusion")
        .clone()
}

fn transpose<T: Copy>(data: &mut [T], n: usize) {
    for iy in 0..n {
        for ix in (iy + 1)..n {
            data.swap(iy * n + ix, ix * n + iy);
        }
    }
}

fn rows<T: Real>(data: &mut [Cplx<T>], n: usize, p: &Arc<dyn Fft<T>>) {
    if n >= PAR_THRESHOLD {
        data.par_chunks_mut(n).for_each(|row| p.process(row));
    } else {
        p.process(data);
    }
}

/// Unnormalized 2D FFT, in place, row-major `n x n`.
pub fn fft2_inplace<T: Real>(data: &mut [Cplx<T>], n: usize, forward: bool) {
    debug_assert_eq!(data.len(), n * n);
    let p = plan::<T>(n, forward);
    rows(data, n, &p);
    transpose(data, n);
    rows(data, n, &p);
    transpose(data, n);
}
