namespace noble {}
