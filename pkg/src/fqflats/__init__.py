"""fqflats - exact incidence graphs of affine flats over finite fields, with spectral bound checks"""
