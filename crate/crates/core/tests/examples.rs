macro_rules! example_test {
    ($module:ident, $file:literal) => {
        mod $module {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));

            #[test]
            fn runs() {
                run_example().expect(concat!($file, " should run"));
            }
        }
    };
}

example_test!(simulate, "simulate.rs");
example_test!(cosine_coefficients, "cosine_coefficients.rs");
example_test!(confidence_bands, "confidence_bands.rs");
example_test!(parallelism, "parallelism.rs");
example_test!(block_selection, "block_selection.rs");
example_test!(coverage_experiment, "coverage_experiment.rs");
example_test!(smoothing, "smoothing.rs");
