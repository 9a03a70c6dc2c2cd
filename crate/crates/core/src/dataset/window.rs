use glovenet_tensor::Tensor;

/// `floor((L − T) / stride) + 1` when `L ≥ T`, else 0.
pub fn window_count(len: usize, window: usize, stride: usize) -> usize {
    assert!(window >= 1 && stride >= 1, "window and stride must be positive");
    if len < window {
        0
    } else {
        (len - window) / stride + 1
    }
}

/// Start offsets `0, stride, 2·stride, …` of every full window.
pub fn window_offsets(len: usize, window: usize, stride: usize) -> Vec<usize> {
    (0..window_count(len, window, stride)).map(|i| i * stride).collect()
}

/// Slices a `[L × S]` series into `[T × S]` windows at the given stride.
pub fn window_semioverlap(series: &Tensor<f32>, window: usize, stride: usize) -> Vec<Tensor<f32>> {
    assert_eq!(series.rank(), 2, "series must be [L, S]");
    let (len, s) = (series.shape()[0], series.shape()[1]);
    window_offsets(len, window, stride)
        .into_iter()
        .map(|off| {
            let data = series.data()[off * s..(off + window) * s].to_vec();
            Tensor::new(vec![window, s], data).expect("window shape")
        })
        .collect()
}

/// Back-to-back windows; the stride equals the window length.
pub fn window_nonoverlap(series: &Tensor<f32>, window: usize) -> Vec<Tensor<f32>> {
    window_semioverlap(series, window, window)
}
