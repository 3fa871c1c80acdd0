// Every example must run to completion.

macro_rules! example {
    ($name:ident) => {
        mod $name {
            include!(concat!("../examples/", stringify!($name), ".rs"));
            #[test]
            fn runs() {
                main();
            }
        }
    };
}

example!(decode_overlaps);
example!(load_elf);
example!(superset_graph);
example!(hidden_gadgets);
example!(galileo_diff);
example!(synthesize);
example!(planted_corpus);
